package shop;

public interface PaymentGateway {
    Receipt charge(Customer customer, long amountCents);
}
