package shop;

import java.util.ArrayList;
import java.util.List;

public class Cart {
    private final List<LineItem> items = new ArrayList<>();
    private DiscountPolicy discount;

    public void add(Product product, int quantity) {
        items.add(new LineItem(product, quantity));
    }

    public long subtotalCents() {
        long sum = 0;
        for (LineItem item : items) {
            sum += item.totalCents();
        }
        return sum;
    }

    public long totalCents() {
        long subtotal = subtotalCents();
        return discount == null ? subtotal : discount.apply(subtotal);
    }

    public boolean isEmpty() {
        return items.isEmpty();
    }
}
